# -*- coding: utf-8 -*-
#
# molguide documentation build configuration file.

import os
import sys

sys.path.insert(0, os.path.abspath(os.path.join("..", "..")))

# -- General configuration ------------------------------------------------

extensions = ["sphinx.ext.autodoc", "sphinx.ext.mathjax", "sphinx.ext.githubpages"]
templates_path = ["ntemplates"]
source_suffix = ".rst"
master_doc = "index"

project = u"molguide"
copyright = u"2024, The molguide authors"
author = u"The molguide authors"
version = u"0.1"
release = u"0.1"

language = None
exclude_patterns = []
pygments_style = "sphinx"
todo_include_todos = False

# numpy, scipy, pandas and tqdm are not needed to render the API pages.
autodoc_mock_imports = ["numpy", "scipy", "pandas", "tqdm"]

# -- Options for HTML output ----------------------------------------------

html_theme = "sphinx_rtd_theme"
html_static_path = ["nstatic"]
htmlhelp_basename = "molguidedoc"

# -- Options for LaTeX, manual page and Texinfo output --------------------

latex_documents = [(master_doc, "molguide.tex", u"molguide Documentation", author, "manual")]
man_pages = [(master_doc, "molguide", u"molguide Documentation", [author], 1)]
texinfo_documents = [
    (
        master_doc,
        "molguide",
        u"molguide Documentation",
        author,
        "molguide",
        "Guided latent diffusion for molecular editing.",
        "Miscellaneous",
    )
]
