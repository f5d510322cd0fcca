"""Reduced row echelon bases over F_p with sparse rows.

Rows are dicts from sortable column labels to nonzero residues.  The pivot
of a row is its smallest label, so the reduced echelon form is canonical and
two subspaces are equal exactly when their row dicts are equal.
"""


class FpEchelon:
    def __init__(self, p):
        self.p = p
        self._rows = {}

    def __len__(self):
        return len(self._rows)

    def __eq__(self, other):
        if not isinstance(other, FpEchelon):
            return NotImplemented
        return self.p == other.p and self._rows == other._rows

    def copy(self):
        new = FpEchelon(self.p)
        new._rows = {k: dict(v) for k, v in self._rows.items()}
        return new

    @property
    def pivots(self):
        return sorted(self._rows)

    def rows(self):
        return [dict(self._rows[k]) for k in sorted(self._rows)]

    def reduce(self, vec):
        p = self.p
        v = {k: c % p for k, c in vec.items() if c % p}
        for col in [c for c in v if c in self._rows]:
            c = v.get(col)
            if not c:
                continue
            for k, a in self._rows[col].items():
                nv = (v.get(k, 0) - c * a) % p
                if nv:
                    v[k] = nv
                else:
                    v.pop(k, None)
        return v

    def contains(self, vec):
        return not self.reduce(vec)

    def add(self, vec):
        """Insert vec; returns True when the span grew."""
        p = self.p
        r = self.reduce(vec)
        if not r:
            return False
        piv = min(r)
        inv = pow(r[piv], -1, p)
        r = {k: c * inv % p for k, c in r.items()}
        for row in self._rows.values():
            c = row.get(piv)
            if c:
                for k, a in r.items():
                    nv = (row.get(k, 0) - c * a) % p
                    if nv:
                        row[k] = nv
                    else:
                        row.pop(k, None)
        self._rows[piv] = r
        return True
