"""
Setup script for GapWiz
"""

from setuptools import setup, find_packages

with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

setup(
    name="gapwiz",
    version="2.0.0",
    author="Srijan-XI",
    author_email="[EMAIL_ADDRESS]",
    description="Certified upper bounds and bad instances for the rank-constrained max-cut SDP",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["test", "test.*"]),
    py_modules=["main"],
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering :: Mathematics",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Operating System :: OS Independent",
        "Environment :: Console",
    ],
    python_requires=">=3.8",
    install_requires=[
        "numpy>=1.22",
        "scipy>=1.9",
        "mpmath>=1.2",
    ],
    entry_points={
        "console_scripts": [
            "gapwiz=main:main",
        ],
    },
    include_package_data=True,
    zip_safe=False,
)
