from setuptools import setup, find_packages

setup(
    name='trailer-cell-cosim',
    version='0.1.0',
    packages=find_packages(include=['Cosim', 'Cosim.*']),
    py_modules=['cosim'],
    install_requires=['numpy', 'pandas'],
    extras_require={'test': ['pytest']},
    entry_points={'console_scripts': ['cosim = cosim:main_cli']},
)
