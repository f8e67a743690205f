try:
    from setuptools import setup
except ImportError:
    from distutils.core import setup

readme_file = "README.md"

with open(readme_file) as f:
    readme = f.read()

setup(
    name='pySERT',
    description='Sparse spatio-temporal forecasting with triplet-encoded transformers',
    long_description=readme,
    long_description_content_type='text/markdown',
    url='',
    version='0.1',
    packages=[
        'pysert',
        'pysert.sert',
        'pysert.sert.tensor',
        'pysert.sert.model',
        'pysert.sert.data',
        'pysert.sert.evaluation',
    ],
    python_requires='>=3.8',
    install_requires=[
        'numpy',
        'pandas>=2.0',
        'twisted',
    ],
    extras_require={
        'docs': ['sphinx'],
    },
    entry_points={
        'console_scripts': ['pysert=pysert.sert.cli:run'],
    },
)
