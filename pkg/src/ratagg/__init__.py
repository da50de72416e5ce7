"""Alpha-fair traffic aggregation across radio access technologies."""
