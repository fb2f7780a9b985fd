class CosimError(Exception):
    """Base class for co-simulation exceptions."""
    pass

class ConfigError(CosimError):
    """ Exception raised for invalid scenario files. Names the offending
    key (dotted path into the file). """
    def __init__(self, key, msg, path=None):
        self.key = key
        self.msg = msg
        self.path = path
        super().__init__(str(self))

    def __str__(self):
        where = '%s: ' % self.path if self.path else ''
        if self.key:
            return '%s%s: %s' % (where, self.key, self.msg)
        return where + self.msg

class TraceError(CosimError):
    """ Malformed acceleration trace. ``row`` is 1-based over data rows. """
    def __init__(self, msg, row=None):
        self.msg = msg
        self.row = row
        super().__init__(msg)

class OutsideTraceError(CosimError):
    pass

class RoadError(CosimError):
    pass

class PlanningError(CosimError):
    pass

class UnreachableTaskError(PlanningError):
    def __init__(self, task, arms):
        self.task = task
        self.arms = arms
        super().__init__('task %s cannot be reached by any of the arms %s'
                         % (task, ', '.join(arms) or '(none)'))

class InstanceTooLarge(PlanningError):
    pass

class ScoringError(CosimError):
    pass
