from setuptools import setup


with open("README.md", "r") as h:
    README = h.read()


setup(
    name="upncert",
    version="0.1.0",
    description="Certificates for the 3-Higgs structure of unitary perfect numbers.",
    long_description=README,
    long_description_content_type="text/markdown",
    python_requires=">=3.10",
    packages=["upncert"],
    package_data={"upncert": ["data/*.json"]},
    install_requires=["gmpy2>=2.1", "requests>=2.20"],
    entry_points={"console_scripts": ["upncert=upncert.cli:main"]},
    classifiers=[
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Development Status :: 3 - Alpha",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
)
