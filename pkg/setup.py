import os
from setuptools import setup, find_packages


def read_requirements():
    with open("requirements.txt") as fp:
        content = fp.readlines()
    return [line.strip() for line in content if not line.startswith("#")]


def find_scripts():
    root = "scripts"
    return [os.path.join(root, f) for f in os.listdir(root)]


setup(
    name="lfunlab",
    version="1.0.0",
    author="Ayyoub BMS",
    author_email="",
    description="Numerical lab for mollified second moments of L-functions",
    long_description=open("README.md").read(),
    long_description_content_type="text/markdown",
    install_requires=read_requirements(),
    extras_require={"test": ["pytest", "jsonschema>=4.0"]},
    url="",
    classifiers=[],
    python_requires=">=3.10",
    packages=find_packages(exclude=["tests", "tests.*"]),
    package_data={"lfunlab": ["schemas/*.json"]},
    scripts=find_scripts(),
)
