"""Command-line front end: run configuration, subcommands and plot-data export."""
