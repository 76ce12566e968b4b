from setuptools import setup, find_packages

with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

setup(
    name="biomatch",
    version="0.1.0",
    description="Biometric verification and identification engine with a from-scratch feature extractor",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(include=["biomatch", "biomatch.*"]),
    include_package_data=True,
    package_data={
        "biomatch.config": ["*.yaml"],
    },
    install_requires=[
        "typer",
        "rich",
        "pydantic>=2",
        "pyyaml",
        "numpy",
    ],
    extras_require={
        "dev": ["pytest", "black", "isort"],
    },
    python_requires=">=3.8",
    entry_points={
        "console_scripts": [
            "biomatch=biomatch.cli:run",
        ],
    },
)
