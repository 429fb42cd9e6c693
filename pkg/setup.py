from setuptools import setup

with open("README.md", "r") as fh:
    long_description = fh.read()

requires = []
with open('requirements.txt') as f:
    for line in f.readlines():
        line = line.strip()  # Remove spaces
        line = line.split('#')[0]  # Remove comments
        if line:  # Remove empty lines
            requires.append(line)

setup(
    name='spikelab',
    version='0.1.0',
    packages=['spikelab'],
    package_dir={'': 'src'},
    license='BSD 3-clause "New" or "Revised" License',
    description='Frequency analysis, energy accounting and desk-scale training of spiking transformers',
    long_description=long_description,
    long_description_content_type="text/markdown",
    python_requires='>=3.6',
    install_requires=requires,
    entry_points={
        'console_scripts': ['spikelab=spikelab.cli:main'],
    }
)
