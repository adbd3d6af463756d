"""Built-in plugins: datasources, record sinks and halt conditions."""
