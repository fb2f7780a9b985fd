# -*- coding: utf-8 -*-
#
# Configuration file for the Sphinx documentation builder.
#
# This file does only contain a selection of the most common options. For a
# full list see the documentation:
# http://www.sphinx-doc.org/en/master/config

# -- Path setup --------------------------------------------------------------

import os
import sys
sys.path.insert(0, os.path.abspath('..'))

import subprocess
subprocess.run('./gen-readme.sh')

# -- Project information -----------------------------------------------------

project = u'trailer-cell-cosim'
copyright = u'2026'
author = u''

# The short X.Y version
version = u'0.1'
# The full version, including alpha/beta/rc tags
release = u'0.1.0'


# -- General configuration ---------------------------------------------------

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.doctest',
    'sphinx.ext.mathjax',
    'sphinx.ext.viewcode',
    'myst_parser',
]

templates_path = ['_templates']

source_suffix = {
    '.rst': 'restructuredtext',
    '.md': 'markdown',
}

# The master toctree document.
master_doc = 'index'

language = None

exclude_patterns = [u'_build', 'Thumbs.db', '.DS_Store']

pygments_style = None

autodoc_member_order = 'bysource'


# -- Options for HTML output -------------------------------------------------

html_theme = 'sphinx_rtd_theme'

htmlhelp_basename = 'cosimdoc'


# -- Options for manual page output ------------------------------------------

man_pages = [
    (master_doc, 'cosim', u'Trailer cell co-simulation', [], 1)
]
