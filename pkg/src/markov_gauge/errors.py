"""Exception hierarchy shared across the package."""


class GraphError(ValueError):
    """Malformed graph input (self-loop, duplicate edge, unknown node)."""


class CycleError(GraphError):
    """Directed edges form a cycle."""


class IllegalCpdagError(GraphError):
    """A partially directed graph that is not the CPDAG of any DAG."""


class GraphParseError(GraphError):
    def __init__(self, message, line_no=None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class DataError(ValueError):
    """Dataset ingestion or column-mapping failure."""


class DegenerateTestError(ArithmeticError):
    """A conditional independence test whose statistic is undefined."""


class ConfigError(ValueError):
    def __init__(self, message, line_no=None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
