from flask import request, jsonify
from services.config import params_from_mapping
from services.errors import ToolkitError
from services.toolkit import ZHawkesToolkit

# Initialize toolkit
toolkit = ZHawkesToolkit()

def predict_process():
    """
    Handle closed-form prediction requests.

    Expected request:
    - POST with JSON data
    - process parameters (baseline, hawkes_ratio, zumbach_ratio, zumbach_decay,
      optional hawkes_decay and tick)
    - Optional 'regime' field: exact_nH0, chi_small or chi_large
    """
    try:
        data = request.get_json(silent=True)

        if not data or not isinstance(data, dict):
            return jsonify({
                'success': False,
                'error': 'No JSON data provided. Please send process parameters in JSON format.'
            }), 400

        regime = data.pop('regime', None)
        params = params_from_mapping(data)
        prediction = toolkit.predict(params, regime)

        return jsonify({
            'success': True,
            'message': 'Prediction computed successfully',
            **prediction
        }), 200

    except ToolkitError as e:
        return jsonify({
            'success': False,
            'error': str(e)
        }), 400
    except Exception as e:
        return jsonify({
            'success': False,
            'error': f'Server error during prediction: {str(e)}'
        }), 500
