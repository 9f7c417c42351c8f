# -*- coding: utf-8 -*-
#
# Sphinx configuration for the pymlt documentation.
#
# Build with ``sphinx-build -b html docs docs/.build``; run the examples in the
# docstrings with ``sphinx-build -b doctest docs docs/.build``.

import os
import sys

DOCS_DIR = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, os.path.dirname(DOCS_DIR))


# -- Project -------------------------------------------------------------------

project = 'pymlt'
copyright = '2026, pymlt developers'
author = 'pymlt developers'

release = '0.3.0'
version = '.'.join(release.split('.')[:2])


# -- General -------------------------------------------------------------------

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.doctest',
    'sphinx.ext.intersphinx',
    'sphinx.ext.mathjax',
    'sphinx.ext.viewcode',
    'sphinx.ext.napoleon',
    ]

# docstrings are numpy style
napoleon_google_docstring = False
napoleon_numpy_docstring = True

autoclass_content = "both"
autodoc_member_order = "groupwise"

doctest_global_setup = 'import numpy as np'

source_suffix = '.rst'
master_doc = 'index'
exclude_patterns = ['.build']


# -- HTML ----------------------------------------------------------------------

html_theme = 'alabaster'
html_theme_options = {
        'show_powered_by': False,
        'description': 'Multiplex latent trade-off models',
        }
html_sidebars = {
    '**': ['about.html', 'globaltoc.html', 'searchbox.html'],
}
htmlhelp_basename = 'pymltdoc'


# -- Other builders ------------------------------------------------------------

latex_documents = [
    (master_doc, 'pymlt.tex', 'pymlt Documentation', author, 'manual'),
]

man_pages = [
    (master_doc, 'pymlt', 'fit and analyse multiplex latent trade-off models', [author], 1),
]


# -- Cross references ----------------------------------------------------------

intersphinx_mapping = {
    'python': ('https://docs.python.org/3', None),
    'numpy': ('https://numpy.org/doc/stable/', None),
    'scipy': ('https://docs.scipy.org/doc/scipy/', None),
    'networkx': ('https://networkx.org/documentation/stable/', None),
    'pandas': ('https://pandas.pydata.org/docs/', None),
}
