"""
Certificate Files
JSON encoding of dual certificates; every number is written as the repr of
the stored double so a load gives back exactly the same values
"""

import json
import logging
import os
from datetime import datetime, timezone

import numpy as np

from . import config
from .cutpoly import LinearInequality
from .exceptions import (
    CertificateFormatError, GapWizError, InequalityCheckError, InvalidInequalityError
)
from .gapbound import CutConstraint, DualCertificate, SampleGrid

logger = logging.getLogger(__name__)


def _num(value):
    return repr(float(value))


def created_timestamp():
    """ISO timestamp from SOURCE_DATE_EPOCH, or None when it is unset"""
    epoch = os.environ.get('SOURCE_DATE_EPOCH')
    if not epoch:
        return None
    try:
        return datetime.fromtimestamp(int(epoch), tz=timezone.utc).strftime('%Y-%m-%dT%H:%M:%SZ')
    except ValueError:
        return None


def to_dict(cert: DualCertificate) -> dict:
    z = cert.grid.z if cert.grid.z is not None else np.zeros(len(cert.grid))
    meta = {'seed': None, 'created': created_timestamp(), 'tool_version': config.APP_VERSION}
    meta.update({k: v for k, v in cert.meta.items() if k not in ('created', 'tool_version')})
    return {
        'version': config.CERTIFICATE_VERSION,
        'n': cert.n,
        'd': cert.d,
        'K_check': cert.k_check,
        'verification_level': cert.verification_level,
        'lambda': _num(cert.lam),
        'alpha': _num(cert.alpha),
        'grid': [{'t': _num(t), 'z': _num(w)} for t, w in zip(cert.grid.ts, z)],
        'constraints': [
            {
                'm': c.size,
                'Z': [_num(v) for v in c.inequality.Z.ravel()],
                'beta': _num(c.beta),
                'points': [[_num(v) for v in row] for row in np.asarray(c.points, dtype=float)],
                'r': [_num(v) for v in np.asarray(c.r, dtype=float)],
                'y': _num(c.y),
                'provenance': c.inequality.provenance,
            }
            for c in cert.constraints
        ],
        'meta': meta,
    }


def from_dict(data: dict, source='<memory>') -> DualCertificate:
    """Rebuild a certificate; entries without stored transforms load with an empty r"""
    try:
        version = int(data['version'])
        if version != config.CERTIFICATE_VERSION:
            raise CertificateFormatError(source, f"unsupported certificate version {version}")
        constraints = []
        for entry in data['constraints']:
            m = int(entry['m'])
            Z = np.array([float(v) for v in entry['Z']], dtype=float)
            if Z.size != m * m:
                raise CertificateFormatError(source, f"Z has {Z.size} entries, expected {m * m}")
            try:
                ineq = LinearInequality(Z.reshape(m, m), float(entry['beta']),
                                        entry.get('provenance', 'custom'))
            except InvalidInequalityError as e:
                raise InequalityCheckError(e.details or e.message, index=len(constraints))
            points = np.array([[float(v) for v in row] for row in entry['points']], dtype=float)
            r = np.array([float(v) for v in entry['r']], dtype=float) if 'r' in entry else np.empty(0)
            constraints.append(CutConstraint(ineq, points, r, float(entry['y'])))

        grid = SampleGrid(np.array([float(g['t']) for g in data['grid']]),
                          np.array([float(g['z']) for g in data['grid']]))
        return DualCertificate(
            n=int(data['n']),
            d=int(data['d']),
            k_check=int(data['K_check']),
            lam=float(data['lambda']),
            grid=grid,
            constraints=constraints,
            alpha=float(data['alpha']),
            verification_level=str(data.get('verification_level', 'float')),
            meta=dict(data.get('meta') or {}),
        )
    except (CertificateFormatError, InequalityCheckError):
        raise
    except (KeyError, TypeError, ValueError, GapWizError) as e:
        raise CertificateFormatError(source, str(e))


def save(cert: DualCertificate, path) -> None:
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(to_dict(cert), f, indent=config.JSON_INDENT)
        f.write('\n')
    logger.info("certificate written to %s", path)


def load(path) -> DualCertificate:
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except FileNotFoundError:
        raise
    except (OSError, ValueError) as e:
        raise CertificateFormatError(path, str(e))
    if not isinstance(data, dict):
        raise CertificateFormatError(path, "top level must be a JSON object")
    return from_dict(data, source=path)
