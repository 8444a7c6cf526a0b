### Conditional implicit light field network

__version__ = '0.1.0'
