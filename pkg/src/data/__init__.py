# Tick ingestion and result files
