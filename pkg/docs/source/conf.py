# Sphinx configuration for the upncert documentation.

import os
import sys
sys.path.insert(0, os.path.abspath('../..'))

from upncert import __version__  # noqa: E402

project = 'upncert'
copyright = '2026, the upncert developers'
author = 'the upncert developers'
release = __version__
version = '.'.join(release.split('.')[:2])

extensions = [
    'sphinx.ext.napoleon',
    'sphinx.ext.autodoc',
    'sphinx.ext.mathjax',
    'sphinx.ext.viewcode',
]

master_doc = 'index'
exclude_patterns = []
pygments_style = 'monokai'
html_theme = 'sphinx_rtd_theme'

# numpy-style docstrings; __init__ docstrings carry the parameters
autoclass_content = 'both'
napoleon_google_docstring = False
napoleon_numpy_docstring = True
napoleon_include_special_with_doc = True
napoleon_use_param = True
napoleon_use_rtype = True
