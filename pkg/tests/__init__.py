# Tests package for the integrating-method solver
