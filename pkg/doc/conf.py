# Licensed under the BSD 3-Clause License.

"""Sphinx configuration for the skelgnn documentation."""

import re
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT))

project = "skelgnn"
language = "en"
master_doc = "index"
source_suffix = ".rst"
templates_path = ["_templates"]
exclude_patterns = ["_templates", "_build"]

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.napoleon",
    "sphinx_autodoc_typehints",
    "sphinx.ext.autosummary",
    "sphinx-mathjax-offline",
]

# jax is only needed by the optimizer; docs build without it
autodoc_mock_imports = ["jax", "optax"]
autosummary_generate = True
autoclass_content = "both"
autodoc_inherit_docstrings = True
add_module_names = False
html_show_sourcelink = False

version_line = re.compile(r'__version__ = "((\d+\.\d+)\.\d+)[a-z0-9\-]*"')
version = release = None
for line in (ROOT / "skelgnn" / "__init__.py").read_text().splitlines():
    match = version_line.match(line)
    if match is not None:
        release, version = match.group(1), match.group(2)
        break

pygments_style = "sphinx"
html_theme = "furo"
html_theme_options = {}
htmlhelp_basename = "skelgnndoc"
