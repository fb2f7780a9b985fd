from . import core, motion, roadnet, disturbance, planner, executor, scoring
from .config import *
