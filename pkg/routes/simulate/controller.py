import os
from flask import request, jsonify
from services.config import config_from_mapping
from services.errors import ToolkitError
from services.toolkit import MODES, ZHawkesToolkit

# Requests run synchronously, so keep them small
MAX_API_HORIZON = float(os.environ.get('MAX_API_HORIZON', 1e6))
MAX_API_EVENTS = int(float(os.environ.get('MAX_API_EVENTS', 1e7)))

# Initialize toolkit
toolkit = ZHawkesToolkit(event_cap=MAX_API_EVENTS)

def simulate_process():
    """
    Handle simulation requests.

    Expected request:
    - POST with JSON data
    - config keys as in a config file (baseline, hawkes_ratio, ..., horizon, seed)
    - Optional 'mode' field: thinning (default) or sde

    Returns a run summary; nothing is written to disk.
    """
    try:
        data = request.get_json(silent=True)

        if not data or not isinstance(data, dict):
            return jsonify({
                'success': False,
                'error': 'No JSON data provided. Please send a run configuration in JSON format.'
            }), 400

        mode = data.pop('mode', 'thinning')
        if mode not in MODES:
            return jsonify({
                'success': False,
                'error': f'Invalid mode. Allowed modes: {", ".join(MODES)}'
            }), 400

        config = config_from_mapping(data)
        if config.horizon > MAX_API_HORIZON:
            return jsonify({
                'success': False,
                'error': f'Horizon too large for a request (max {MAX_API_HORIZON:g}). Use the command line instead.'
            }), 400

        summary = toolkit.simulate(config, mode=mode)

        return jsonify({
            'success': True,
            'message': 'Simulation completed successfully',
            'summary': summary,
            'config': config.echo()
        }), 200

    except ToolkitError as e:
        return jsonify({
            'success': False,
            'error': str(e)
        }), 400
    except Exception as e:
        return jsonify({
            'success': False,
            'error': f'Server error during simulation: {str(e)}'
        }), 500
