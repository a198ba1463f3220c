from dataclasses import dataclass
from typing import Optional

import numpy as np

NEGATIVE = 0
POSITIVE = 1


@dataclass(frozen=True)
class ProbPair:
    """Two-class output probabilities, index 0 negative and index 1 positive."""
    p0: float
    p1: float
    given_label: Optional[int] = None

    @classmethod
    def from_array(cls, probs, given_label=None):
        probs = np.asarray(probs, dtype=np.float64)
        return cls(float(probs[0]), float(probs[1]), given_label)

    @property
    def p(self):
        return np.array([self.p0, self.p1])

    def __getitem__(self, index):
        return (self.p0, self.p1)[index]

    @property
    def margin(self):
        return self.p1 - self.p0

    def predict_label(self):
        # ties go to the negative class
        return NEGATIVE if self.p0 >= self.p1 else POSITIVE
