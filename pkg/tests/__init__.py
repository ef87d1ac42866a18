# Test package for choi-ladder
