from ast import literal_eval
from setuptools import setup

def get_version(source='coherent4odes/__init__.py'):
    with open(source) as f:
        for line in f:
            if line.startswith('__version__'):
                return literal_eval(line.partition('=')[2].lstrip())
    raise ValueError("VERSION not found")

README = ''
with open('README.rst', 'r') as f:
    README = f.read()

setup(
    name='coherent4odes',
    version = get_version(),
    packages = ['coherent4odes'],
    package_data = {'coherent4odes': ['schemas/*.json']},
    description='Structural analysis of coherent (positive feedback) ODE systems',
    long_description = README,
    author='Pierre-Antoine Champin',
    license='LGPL v3',
    platforms='OS Independant',
    install_requires = ["sympy", "networkx>=3.1", "numpy", "scipy"],
    setup_requires = ["pytest-runner"],
    tests_require = ["pytest", "jsonschema"],
    entry_points = {
        'console_scripts': ['coherent4odes=coherent4odes.cli:main'],
    },
)
