from setuptools import setup, find_packages

# Install with 'pip install -e .'

from pathlib import Path

this_directory = Path(__file__).parent
long_description = (this_directory / "README.md").read_text()

setup(
    name="skelgnn",
    version="0.1.0",  # -version-
    description="skelgnn: graph neural networks for 2D-to-3D skeleton lifting",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["tests", "tests.*"]),
    install_requires=[
        "numpy>=1.21.5",
        "matplotlib>=3.1.3",
        "joblib>=1.1.0",
        "jax>=0.4.8",
        "optax>=0.1.2",
    ],
    extras_require={"test": ["pytest>=7.0"]},
    entry_points={"console_scripts": ["skelgnn=skelgnn.cli:main"]},
    license="BSD-3-Clause",
)
