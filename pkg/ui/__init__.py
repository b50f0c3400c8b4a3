# Dashboard display helpers
