#!/usr/bin/env python

from setuptools import setup, find_packages

setup(name='pymlt',
      version='0.3.0',
      description='Multiplex latent trade-off models for directed multiplex networks',
      author='pymlt developers',
      url='https://github.com/pymlt/pymlt',
      packages=find_packages(exclude=["tests", "tests.*"]),
      package_data={"": ["*.yaml", "*.json"]},
      include_package_data=True,
      install_requires=[
              "networkx>=2.5",
              "numpy>=1.20",
              "pandas",
              "pendulum",
              "ruamel.yaml",
              "scikit-learn",
              "scipy>=1.9",
              "xarray>=0.11.0",
              ],
      setup_requires=[
          'green'
          ],
      entry_points={
          "console_scripts": ["pymlt=pymlt.core.parser:main"],
          },
      zip_safe=False
     )
