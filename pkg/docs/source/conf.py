# Sphinx configuration for the pymjs documentation.
import os
import sys

sys.path.insert(0, os.path.abspath('../..'))

from pymjs import __version__  # noqa: E402

extensions = [
    'sphinx.ext.autodoc',
    'numpydoc',
]

source_suffix = '.rst'
master_doc = 'index'

project = 'pymjs'
author = 'pymjs developers'
copyright = '2018, pymjs developers'
version = release = __version__

pygments_style = 'sphinx'

# readthedocs.org applies its own theme
if os.environ.get('READTHEDOCS', None) != 'True':
    import sphinx_rtd_theme
    html_theme = 'sphinx_rtd_theme'
    html_theme_path = [sphinx_rtd_theme.get_html_theme_path()]

numpydoc_show_class_members = False
