##############################################################################
#
# Copyright polyspec Contributors.
# All Rights Reserved.
#
# This software is subject to the provisions of the Zope Public License,
# Version 2.1 (ZPL).  A copy of the ZPL should accompany this distribution.
# THIS SOFTWARE IS PROVIDED "AS IS" AND ANY AND ALL EXPRESS OR IMPLIED
# WARRANTIES ARE DISCLAIMED, INCLUDING, BUT NOT LIMITED TO, THE IMPLIED
# WARRANTIES OF TITLE, MERCHANTABILITY, AGAINST INFRINGEMENT, AND FITNESS
# FOR A PARTICULAR PURPOSE.
#
##############################################################################
"""The polyspec command-line front end.

``polyspec <command> [options] [name=value ...]`` where the commands are
spectrum, certify, descend, bounds, stability and torsion, and trailing
``name=value`` arguments are configuration options.
"""

# Public names:
__all__ = (
    'COMMANDS',
    'main',
)

import io
import json
import logging
import math
import optparse
import sys

import polyspec
from polyspec import bounds
from polyspec import certify
from polyspec import descent
from polyspec import hessian
from polyspec import stability
from polyspec import torsion


log = logging.getLogger(__name__)

# l*_4: the square
SQUARE_J = 2 * math.pi ** 2


def _printable(value):
    """Round floats to 9 significant digits, keeping hex copies."""
    if isinstance(value, dict):
        result = {}
        for name, item in value.items():
            if isinstance(item, float):
                result[name + '_hex'] = item.hex()
            result[name] = _printable(item)
        return result
    if isinstance(value, (list, tuple)):
        return [_printable(item) for item in value]
    if isinstance(value, float) and math.isfinite(value):
        return float('%.9g' % value)
    return value


def _json(data):
    return json.dumps(_printable(data), indent=2, sort_keys=True) + '\n'


def _provenance(options, config):
    return '# ' + json.dumps(dict(
        command=options.command, n=options.n, m=options.m,
        config=config.as_dict()), sort_keys=True) + '\n'


def spectrum(options, config):
    result = hessian.hessian_spectrum(options.n, options.m, config)
    out = io.StringIO()
    out.write(_provenance(options, config))
    hessian.write_spectrum_csv(result, out)
    return out.getvalue()


def certify_(options, config):
    verdict = certify.certify_local_min(options.n, options.m, config)
    return certify.verdict_to_json(verdict) + '\n'


def descend(options, config):
    P0 = descent.random_polygon(options.n, config.seed)
    run = descent.descend(P0, config)
    if options.log:
        with open(options.log, 'w') as f:
            run.write_log(f)
    result = run.diagnostics(extrapolate=options.extrapolate)
    result['config'] = config.as_dict()
    return _json(result)


def bounds_(options, config):
    n = options.n
    l_star = descent.REFERENCE_J.get(n)
    l_star_prev = SQUARE_J if n == 5 else descent.REFERENCE_J.get(n - 1)
    result = bounds.report(options.K, n, options.delta, l_star_prev, l_star)
    result['config'] = config.as_dict()
    return _json(result)


def stability_(options, config):
    return _json(stability.report(options.n, options.epsilon,
                                  options.trials, options.levels, config))


def torsion_(options, config):
    result = torsion.torsion_spectrum(options.n, options.m, config)
    out = io.StringIO()
    out.write(_provenance(options, config))
    out.write('# T=%.9g T_hex=%s\n' % (result.rigidity,
                                       float(result.rigidity).hex()))
    torsion.write_torsion_csv(result, out)
    return out.getvalue()


COMMANDS = dict(
    spectrum=spectrum,
    certify=certify_,
    descend=descend,
    bounds=bounds_,
    stability=stability_,
    torsion=torsion_,
)


def main(args=None):
    """Run one polyspec command and return the exit status.

    It is exported as a ``console_script`` entry point named
    ``polyspec``.
    """

    if args is None:
        logging.basicConfig()
        args = sys.argv[1:]

    usage = ("Usage: %%prog command [options] name=value ...\n\n"
             "Commands: %s" % ', '.join(sorted(COMMANDS)))
    parser = optparse.OptionParser(usage, prog='polyspec')
    parser.add_option(
        '--config', '-c', dest='config',
        help="Read options from the [polyspec] section of an ini file.")
    parser.add_option(
        '--verbose', '-v', action='store_true', dest='verbose',
        help="Log debugging output.")
    parser.add_option(
        '--n', type='int', dest='n', default=5,
        help="Number of polygon vertices.")
    parser.add_option(
        '--m', type='int', dest='m', default=16,
        help="Subdivisions of every slice of the symmetric mesh.")
    parser.add_option(
        '--gamma-grid', dest='gamma_grid',
        help="Singular exponents to try, as 'start stop count'.")
    parser.add_option('--seed', dest='seed', help="Random seed.")
    parser.add_option('--threads', dest='threads',
                      help="Worker threads.")
    parser.add_option('--out', '-o', dest='out',
                      help="Write the result to a file.")
    parser.add_option('--log', dest='log',
                      help="descend: write the iteration log (CSV).")
    parser.add_option('--extrapolate', action='store_true',
                      dest='extrapolate',
                      help="descend: extrapolate the final J.")
    parser.add_option('-K', type='float', dest='K', default=8.0,
                      help="bounds: upper bound of l*_n / pi.")
    parser.add_option('--delta', type='float', dest='delta', default=1e-3,
                      help="bounds: covering radius.")
    parser.add_option('--epsilon', type='float', dest='epsilon',
                      default=1e-3,
                      help="stability: vertex displacement.")
    parser.add_option('--trials', type='int', dest='trials', default=20,
                      help="stability: random perturbations.")
    parser.add_option('--levels', type='int', dest='levels', default=3,
                      help="stability: refinements of the base mesh.")

    def error(message):
        sys.stderr.write("Error:\n%s\n\n" % message)
        parser.print_help(sys.stderr)
        return 2

    options, pos = parser.parse_args(args)

    if not pos or pos[0] not in COMMANDS:
        return error("A command is required, one of: %s"
                     % ', '.join(sorted(COMMANDS)))
    options.command = pos.pop(0)

    if [a for a in pos if '=' not in a]:
        return error("Positional arguments must be of the form name=value.")
    config_options = dict(a.split('=', 1) for a in pos)
    for name in ('gamma_grid', 'seed', 'threads'):
        value = getattr(options, name)
        if value is not None:
            config_options[name] = value

    if options.verbose:
        logging.getLogger('polyspec').setLevel(logging.DEBUG)

    try:
        if options.config:
            config = polyspec.Configuration.from_file(
                options.config, **config_options)
        else:
            config = polyspec.Configuration(config_options)
        output = COMMANDS[options.command](options, config)
    except polyspec.PolyspecError as v:
        log.debug("%s failed", options.command, exc_info=True)
        sys.stdout.write(json.dumps(v.as_dict(), indent=2, sort_keys=True,
                                    default=str) + '\n')
        return 1

    if options.out:
        with open(options.out, 'w') as f:
            f.write(output)
    else:
        sys.stdout.write(output)
    return 0
