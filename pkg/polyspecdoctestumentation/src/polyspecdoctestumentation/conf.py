# -*- coding: utf-8 -*-
#
# polyspec documentation build configuration file
#
# This file is execfile()d with the current directory set to its
# containing dir.

project = u'polyspec'
version = '1.0.0'
copyright = u'polyspec Contributors'

extensions = ['sphinx.ext.autodoc']

templates_path = ['_templates']

source_suffix = '.txt'

master_doc = 'contents'

release = version

exclude_trees = ['_build']
exclude_patterns = ['_build', '*.test']

pygments_style = 'sphinx'

# The reference documents the modules' docstrings.
autodoc_member_order = 'bysource'

html_theme = 'default'
html_static_path = []
html_copy_source = False
html_show_sourcelink = False

htmlhelp_basename = 'polyspecdoc'

latex_documents = [
  ('contents', 'polyspec.tex', u'polyspec Documentation',
   u'polyspec Contributors', 'manual'),
]
