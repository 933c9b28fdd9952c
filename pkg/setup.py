from setuptools import setup, find_packages

# Version info -- read without importing
_locals = {}
with open("dslx/_version.py") as fp:
    exec(fp.read(), None, _locals)
    version = _locals["__version__"]

with open("README.md", "r") as fh:
    long_description = fh.read()

with open('requirements.txt') as f:
    requirements = [r for r in f.read().splitlines()
                    if r and not r.startswith('#')]

setup(
    name="dslx",
    version=version,
    description="dslx - decentralized spike-based learning for discrete "
                "perimeter defense",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["examples", "examples.*"]),
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
    ],
    install_requires=requirements,
    entry_points={
        "console_scripts": ["dslx = dslx.cli:main"],
    },
    python_requires='>=3.7',
)
