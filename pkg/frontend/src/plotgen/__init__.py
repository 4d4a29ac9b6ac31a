"""Panel plots (median line, interquartile band) from simulator sweep CSVs."""
