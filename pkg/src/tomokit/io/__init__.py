from .jsonio import dumps, read_json, write_json
from .tensorfile import read_tensor, tensor_bytes, tensor_from_bytes, write_tensor

__all__ = [
    "dumps",
    "read_json",
    "write_json",
    "read_tensor",
    "tensor_bytes",
    "tensor_from_bytes",
    "write_tensor",
]
