# Configuration, errors and small helpers
