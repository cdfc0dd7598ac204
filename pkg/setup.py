from setuptools import setup


packages = ['pymjs',
            'pymjs.tests',
            ]

install_requires = [
    'numpy',
    'numba',
    'scipy',
    'pandas',
]

setup(name='pymjs',
      description="Mode clustering and reduction for Markov jump systems",
      version='0.1.0',
      classifiers=[
        "Intended Audience :: Science/Research",
        "Programming Language :: Python",
        "Programming Language :: Python :: 3.6",
      ],
      packages=packages,
      install_requires=install_requires,
      entry_points={
        'console_scripts': ['pymjs=pymjs.cli:main'],
      },
      license="BSD",
      )
