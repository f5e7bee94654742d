import glob
import os
import shutil
import sys
import tempfile

# When running against an in-tree CMake build, the extension lives in the
# build directory; assemble an importable package in a scratch dir. With an
# installed ipglab (pip) this is skipped.
ext_dir = os.environ.get("IPGLAB_EXT_DIR")
if ext_dir:
    pkg_dir = tempfile.mkdtemp(prefix="ipglab_pkg_")
    os.makedirs(os.path.join(pkg_dir, "ipglab"), exist_ok=True)
    init_src = os.path.join(
        os.path.dirname(__file__), "..", "..", "python", "ipglab", "__init__.py"
    )
    shutil.copy(init_src, os.path.join(pkg_dir, "ipglab", "__init__.py"))
    for so in glob.glob(os.path.join(ext_dir, "_core*.so")):
        shutil.copy(so, os.path.join(pkg_dir, "ipglab"))
    sys.path.insert(0, pkg_dir)
