from setuptools import setup, find_packages

# read the contents of your README file
from pathlib import Path
this_directory = Path(__file__).parent
long_description = (this_directory / "README.md").read_text()

VERSION = "0.3.0"
DESCRIPTION = "Perfect sampling toolkits for finite Markov chains, with exact rational oracles"

# Setting up
setup(
    name="perfect-mcmc-toolkits",
    version=VERSION,
    description=DESCRIPTION,
    long_description_content_type="text/markdown",
    long_description=long_description,
    packages=find_packages(exclude=["tests", "tests.*"]),
    package_data={"perfect_mcmc": ["data/*.json"]},
    python_requires=">=3.9",
    install_requires=["pydantic>=2.0", "numpy>=1.22", "scipy>=1.8", "sympy>=1.10"],
    extras_require={"test": ["pytest>=7"]},
    entry_points={"console_scripts": ["perfect-mcmc=perfect_mcmc.__main__:main"]},
    keywords=["markov chain", "perfect sampling", "cftp", "rejection sampling", "mcmc", "exact", "toolkit"],
    include_package_data=True,
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "Programming Language :: Python :: 3 :: Only",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Topic :: Scientific/Engineering :: Mathematics",
        "Operating System :: OS Independent",
        "Typing :: Typed"
    ],
)
