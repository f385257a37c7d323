# -*- coding: utf-8 -*-
#
# coherent4odes documentation build configuration file.

import os
import sys

sys.path.append(os.path.dirname(os.path.dirname(__file__)))

from coherent4odes import __version__

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.intersphinx',
    'sphinx.ext.mathjax',
    'sphinx.ext.viewcode',
]

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = u'coherent4odes'
author = u'Pierre-Antoine Champin <http://champin.net/#pa>'
copyright = u'2026, ' + author

version = __version__
release = version
language = "en"

exclude_patterns = ['_build']
pygments_style = 'sphinx'

html_theme = 'alabaster'
html_static_path = ['_static']
htmlhelp_basename = 'coherent4odesdoc'

man_pages = [
    (master_doc, 'coherent4odes', u'coherent4odes Documentation',
     [author], 1)
]

intersphinx_mapping = {
    'python': ('https://docs.python.org/3', None),
    'sympy': ('https://docs.sympy.org/latest', None),
    'networkx': ('https://networkx.org/documentation/stable', None),
}

# keep the order of the source: value types first, then operations
autodoc_member_order = 'bysource'
