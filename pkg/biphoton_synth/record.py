import json
from typing import Sequence

from xmodel import BaseModel

from .strategy import MonteCarloEstimate


class SimulationRecord(BaseModel):
    """
    The JSON document written by `biphoton-synth simulate --format json`.

    Schema: `docs/report.schema.json`.  The field names here are the JSON keys; the
    `xmodel.BaseModel` machinery turns an instance into a JSON dict via `record.api.json()`.

    >>> record = SimulationRecord(strategy="det:++++", steps=4, seed=1)
    >>> record.api.json()['strategy']
    'det:++++'
    """
    strategy: str
    steps: int
    seed: int
    noncr_fraction: float
    stderr: float
    chsh_S: float
    makespan_s: float

    def to_json(self, replications: Sequence[MonteCarloEstimate] = ()) -> str:
        """
        Serialized record, keys sorted so identical runs give identical bytes.

        When more than one replication was run, each one's `mean`/`stderr`/`steps` is listed
        under `replications`; the top level fields then describe the pooled estimate.
        """
        data = self.api.json()
        if len(replications) > 1:
            data['replications'] = [r._asdict() for r in replications]
        return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
