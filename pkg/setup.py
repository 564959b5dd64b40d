#
# Copyright 2015-2024 University of Southern California
# Distributed under the Apache License, Version 2.0. See LICENSE for more info.
#

from setuptools import setup

setup(
    name="levycouple",
    description="couplings of Levy-driven stochastic differential equations",
    version="0.1",
    packages=["levycouple", "levycouple.measures", "levycouple.operators"],
    scripts=["bin/levy-couple"],
    install_requires=[
        "webauthn2",
        "numpy>=1.22",
        "scipy>=1.8",
    ],
    extras_require={
        "test": ["pytest"],
    },
    maintainer_email="isrd-support@isi.edu",
    license='Apache 2.0',
    classifiers=[
        'Intended Audience :: Science/Research',
        'Intended Audience :: Developers',
        'License :: OSI Approved :: Apache Software License',
        'Operating System :: POSIX',
        'Programming Language :: Python',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Programming Language :: Python :: 3.11',
        'Topic :: Scientific/Engineering :: Mathematics',
    ])
