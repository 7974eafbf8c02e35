import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from progex import Feature, FeatureSchema

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def ab_schema():
    return FeatureSchema([Feature("A", "boolean"), Feature("B", "boolean")])


@pytest.fixture(scope="session")
def abcd_schema():
    return FeatureSchema([Feature(c, "boolean") for c in "ABCD"])


@pytest.fixture(scope="session")
def adult_schema():
    """Feature space shaped like the census-income examples."""
    return FeatureSchema(
        [
            Feature("Age", "numeric", thresholds=(30.0, 40.0, 50.0)),
            Feature("HoursPerWeek", "numeric", thresholds=(35.0, 40.0, 45.0)),
            Feature("CapitalGain", "numeric", thresholds=(0.0, 600.0)),
            Feature("Married", "boolean"),
        ]
    )


@pytest.fixture(scope="session")
def clinic_schema():
    """Feature space shaped like the readmission examples."""
    return FeatureSchema(
        [
            Feature("Diag:Other", "boolean"),
            Feature("Tolbutamide", "boolean"),
            Feature("Tolazamide", "boolean"),
            Feature("Discharged:Home", "boolean"),
            Feature("NumInpatient", "numeric", thresholds=(1.0, 2.0)),
        ]
    )
