# Analyze route module
