"""Ground-truth generators and simulation harnesses."""
