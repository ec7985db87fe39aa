from setuptools import setup, find_packages

setup(
    name="fvkplate",
    version="0.1.0",
    packages=find_packages(exclude=["tests", "tests.*"]),
    install_requires=[
        "numpy>=1.24",
        "scipy>=1.12",
        "pydantic>=2.0",
        "python-dotenv>=0.19.0",
    ],
    extras_require={
        "test": ["pytest>=7.0"],
        "all": ["pytest>=7.0"],
    },
    entry_points={
        "console_scripts": ["fvkplate=fvkplate.cli:main"],
    },
    author="fvkplate developers",
    description="Discrete Foppl-von Karman plate energies, minimizers, buckling and wrinkling relaxation",
    long_description=open("README.md", encoding="utf-8").read(),
    long_description_content_type="text/markdown",
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Topic :: Scientific/Engineering :: Physics",
    ],
    python_requires=">=3.9",
)
