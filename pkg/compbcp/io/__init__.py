from compbcp.io.loaders import (
    JSONLoader,
    YAMLLoader,
    format_float,
    read_matrix_csv,
    read_vector_csv,
    write_matrix_csv,
    write_records_csv,
)

__all__ = [
    "JSONLoader",
    "YAMLLoader",
    "format_float",
    "read_matrix_csv",
    "read_vector_csv",
    "write_matrix_csv",
    "write_records_csv",
]
