# -*- coding: utf-8 -*-
#
# pySERT documentation build configuration file.
#
# This file is execfile()d with the current directory set to its containing dir.

import sys, os

# The package is documented from the source tree.
sys.path.insert(0, os.path.abspath('../..'))

# -- General configuration -----------------------------------------------------

extensions = ['sphinx.ext.autodoc']

templates_path = ['_templates']

source_suffix = '.rst'

master_doc = 'index'

project = u'pySERT'
copyright = u'2026, pySERT developers'

version = '0.1'
release = '0.1'

exclude_patterns = []

pygments_style = 'sphinx'

autodoc_member_order = 'bysource'

# -- Options for HTML output ---------------------------------------------------

html_theme = 'default'

html_static_path = ['_static']

htmlhelp_basename = 'pySERTdoc'

# -- Options for LaTeX output --------------------------------------------------

latex_elements = {
}

latex_documents = [
  ('index', 'pySERT.tex', u'pySERT Documentation',
   u'pySERT developers', 'manual'),
]

# -- Options for manual page output --------------------------------------------

man_pages = [
    ('index', 'pysert', u'pySERT Documentation',
     [u'pySERT developers'], 1)
]
