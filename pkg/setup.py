
from setuptools import setup, find_packages

setup(
    name="fdrpath",
    packages=find_packages(where="src"),
    package_dir={"": "src"},
    python_requires=">=3.9",
    setup_requires=["pytest-runner"],
    install_requires=[
        "click",
        "matplotlib",
        "numpy",
        "pandas",
        "scipy",
        "sentry-sdk",
    ],
    tests_require=["mypy", "pytest", "pytest-mock"],
    entry_points={
        "console_scripts": [
            "fdrpath = fdrpath.cli:main",
        ]
    },
    version="0.1.0",
)
