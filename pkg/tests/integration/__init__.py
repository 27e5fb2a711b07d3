"""Long-running reproduction tests (marker ``integration``)."""
