"""Grammar inference from positive examples and a black-box oracle."""
