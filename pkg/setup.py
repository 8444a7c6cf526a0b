from setuptools import setup, find_packages

with open('README.md') as readme_file:
    README = readme_file.read()

with open('HISTORY.md') as history_file:
    HISTORY = history_file.read()

setup_args = dict(
    name='ciln',
    version='0.1.0',
    entry_points = {
        'console_scripts': ['ciln=ciln.driver.CilnDriver:main',
            'CilnData=ciln.data.getdata:main',
            'CilnSummary=ciln.util.summarize:main',
        ],
    },
    description='Conditional implicit light field network for view synthesis and light field super-resolution',
    long_description_content_type="text/markdown",
    long_description=README + '\n\n' + HISTORY,
    license='MIT',
    packages=find_packages(include=['ciln', 'ciln.*']),
    keywords=['Light field', 'View synthesis', 'Implicit neural representation', 'Super-resolution'],
)

install_requires = [
    'numpy>=1.20',
    'scipy>=1.6',
    'imageio>=2.9',
    'scikit-image>=0.19',
    'h5py',
    'pandas',
    'psutil',
]

extras_require = {
    'test': ['pytest'],
}

if __name__ == '__main__':
    setup(**setup_args, install_requires=install_requires, extras_require=extras_require, include_package_data=True)
