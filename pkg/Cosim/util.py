import math

from Cosim.config import PRECISION

def fmt(x, precision=PRECISION):
    """ Fixed-point rendering for CSV outputs. Negative zero is printed as
    zero so that reruns compare byte for byte. """
    if x is None:
        return ''
    if isinstance(x, int) and not isinstance(x, bool):
        return str(x)
    s = '%.*f' % (precision, x)
    if float(s) == 0:
        s = '%.*f' % (precision, 0.0)
    return s

def mean(xs):
    xs = list(xs)
    if not xs:
        return float('nan')
    return math.fsum(xs) / len(xs)

def parse_seeds(text):
    """ Parse ``1,2,5`` or ``1-50`` or mixtures thereof. """
    seeds = []
    for part in text.split(','):
        part = part.strip()
        if not part:
            continue
        if '-' in part:
            lo, hi = part.split('-', 1)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise ValueError('empty seed range %s' % part)
            seeds.extend(range(lo, hi + 1))
        else:
            seeds.append(int(part))
    if not seeds:
        raise ValueError('no seeds in %r' % text)
    for s in seeds:
        if s < 0 or s >= 2 ** 64:
            raise ValueError('seed %d out of range' % s)
    return seeds

def parse_list(text):
    return [x.strip() for x in text.split(',') if x.strip()]
