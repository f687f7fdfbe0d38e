from skelgnn import errors
from skelgnn import graphs
from skelgnn import autodiff
from skelgnn import layers
from skelgnn import models
from skelgnn import data
from skelgnn import metrics
from skelgnn import samplers
from skelgnn import buffers
from skelgnn import tools
from skelgnn import plotting

__version__ = "0.1.0"  # -version-
