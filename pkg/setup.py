#!/usr/bin/env python
# -*- coding: utf-8 -*-
from setuptools import setup


def readme():
    with open("README.md") as f:
        return f.read()


setup(
    name="molguide",
    version="0.1",
    description="Guided latent diffusion for structure-preserving molecular editing",
    long_description=readme(),
    long_description_content_type="text/markdown",
    author="The molguide authors",
    license="MIT",
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering :: Chemistry",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
    ],
    keywords="diffusion guidance molecule editing",
    packages=["molguide", "molguide.chem", "molguide.tests"],
    package_data={"molguide": ["examples/*.cfg", "examples/*.smi"]},
    install_requires=["numpy", "scipy", "pandas", "tqdm"],
    entry_points={"console_scripts": ["molguide = molguide.cli:main"]},
    test_suite="molguide.tests",
    zip_safe=False,
)
