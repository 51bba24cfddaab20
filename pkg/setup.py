# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

from setuptools import find_packages, setup


VERSION = "0.0.0.dev"

setup(
    name="advseg3d",
    version=VERSION,
    author="advseg3d contributors",
    packages=find_packages("./", exclude=["tests", "tests.*", "tools"]),
    install_requires=[line.strip() for line in open("requirements.txt") if line.strip() and not line.startswith("#")],
    python_requires=">=3.10",
    entry_points={"console_scripts": ["advseg3d=advseg3d.cli:main"]},
)
