# type: ignore
# Sphinx configuration for the tropreg docs. Build with `tox -e docs`.

import inspect
import os
import shutil
import sys

__location__ = os.path.join(
    os.getcwd(), os.path.dirname(inspect.getfile(inspect.currentframe()))
)

sys.path.insert(0, os.path.join(__location__, ".."))

# -- Run sphinx-apidoc -------------------------------------------------------
# ReadTheDocs does not run `sphinx-apidoc` before `sphinx-build`, so the API
# pages are regenerated here on every build.

from sphinx.ext import apidoc

output_dir = os.path.join(__location__, "api")
module_dir = os.path.join(__location__, "../tropreg")
shutil.rmtree(output_dir, ignore_errors=True)

try:
    apidoc.main(["--implicit-namespaces", "-f", "-o", output_dir, module_dir])
except Exception as e:
    print("Running `sphinx-apidoc` failed!\n{}".format(e))

# -- General configuration ---------------------------------------------------

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.intersphinx",
    "sphinx.ext.viewcode",
    "sphinx.ext.doctest",
    "sphinx.ext.napoleon",
    "recommonmark",
]


# index.md relies on the auto toc tree and on eval_rst blocks
def setup(app):
    from recommonmark.transform import AutoStructify

    params = {
        "enable_auto_toc_tree": True,
        "auto_toc_tree_section": "Contents",
        "enable_eval_rst": True,
    }
    app.add_config_value("recommonmark_config", params, True)
    app.add_transform(AutoStructify)


source_suffix = [".rst", ".md"]
master_doc = "index"
exclude_patterns = ["_build", "Thumbs.db", ".DS_Store", ".venv"]

project = "tropreg"
copyright = "2026, tropreg developers"

try:
    from tropreg import __version__ as version
except ImportError:
    version = ""
release = version

pygments_style = "sphinx"

# -- Options for HTML output -------------------------------------------------

html_theme = "alabaster"
html_theme_options = {"sidebar_width": "300px", "page_width": "1200px"}
htmlhelp_basename = "tropreg-doc"

# -- External mapping --------------------------------------------------------

python_version = ".".join(map(str, sys.version_info[0:2]))
intersphinx_mapping = {
    "python": ("https://docs.python.org/" + python_version, None),
    "numpy": ("https://numpy.org/doc/stable", None),
}
