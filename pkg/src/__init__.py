# Edge-cloud continuum simulator - Main package
