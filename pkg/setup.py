import os

from setuptools import setup, find_packages

from pivot_ci import __version__


def read_readme():
    readme_file = os.path.join(os.path.dirname(__file__), 'README.md')
    if not os.path.isfile(readme_file):
        return ''
    with open(readme_file, encoding='utf-8') as rf:
        return rf.read()


setup(
    name='pivot-ci',
    version=__version__,
    packages=find_packages(exclude=['test']),
    install_requires=['setuptools', 'numpy', 'scipy'],
    license='MIT',
    description='Exact confidence intervals by pivoting the CDF, for censored exponential life-tests and more.',
    long_description=read_readme(),
    long_description_content_type='text/markdown',
    platforms=['OS Independent'],
    keywords=['statistics', 'confidence interval', 'censoring', 'life-test', 'exponential'],
    classifiers=[
        'Environment :: Console',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: MIT License',
        'Operating System :: OS Independent',
        'Programming Language :: Python',
        'Topic :: Scientific/Engineering :: Mathematics',
        'Development Status :: 4 - Beta',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
    ],
    test_suite='test',
    entry_points={
        'console_scripts': [
            'pivotci = pivot_ci.cli:main',
        ],
    },
    include_package_data=True,
)
