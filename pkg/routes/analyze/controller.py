import os
import tempfile
from flask import request, jsonify
from werkzeug.utils import secure_filename
from services.errors import ToolkitError
from services.storage import read_series
from services.toolkit import ZHawkesToolkit

# Initialize toolkit
toolkit = ZHawkesToolkit()

# Allowed file extensions for series files
ALLOWED_EXTENSIONS = {'csv', 'txt'}

def allowed_file(filename):
    """Check if the uploaded file has an allowed extension."""
    return '.' in filename and \
           filename.rsplit('.', 1)[1].lower() in ALLOWED_EXTENSIONS

def _optional_float(name):
    value = request.form.get(name, '').strip()
    return float(value) if value else None

def analyze_series():
    """
    Handle analysis requests with a series file upload.

    Expected request:
    - POST with multipart/form-data
    - 'series' field containing a series.csv or path.csv produced by simulate
    - Optional 'fit_min', 'fit_max', 'windows', 'burn_in', 'subsample_gap',
      'threshold' fields
    """
    try:
        if 'series' not in request.files:
            return jsonify({
                'success': False,
                'error': 'No series file provided. Please upload a series file.'
            }), 400

        series_file = request.files['series']

        if series_file.filename == '':
            return jsonify({
                'success': False,
                'error': 'No series file selected. Please choose a file to upload.'
            }), 400

        if not allowed_file(series_file.filename):
            return jsonify({
                'success': False,
                'error': f'Invalid file type. Allowed types: {", ".join(sorted(ALLOWED_EXTENSIONS))}'
            }), 400

        try:
            options = {
                'fit_min': _optional_float('fit_min') or 1e2,
                'fit_max': _optional_float('fit_max') or 1e4,
                'n_windows': int(request.form.get('windows', 9)),
                'burn_in': _optional_float('burn_in'),
                'subsample_gap': _optional_float('subsample_gap'),
                'threshold': _optional_float('threshold') or 0.1,
            }
        except ValueError as e:
            return jsonify({
                'success': False,
                'error': f'Invalid analysis option: {str(e)}'
            }), 400

        # Save uploaded file temporarily
        filename = secure_filename(series_file.filename)
        temp_dir = tempfile.mkdtemp()
        temp_path = os.path.join(temp_dir, filename)

        try:
            series_file.save(temp_path)
            result = toolkit.analyze(read_series(temp_path), **options)
        finally:
            if os.path.exists(temp_path):
                os.remove(temp_path)
            os.rmdir(temp_dir)

        result.pop('survival', None)
        return jsonify({
            'success': True,
            'message': 'Series analysis completed successfully',
            'analysis': result
        }), 200

    except ToolkitError as e:
        return jsonify({
            'success': False,
            'error': str(e)
        }), 400
    except Exception as e:
        return jsonify({
            'success': False,
            'error': f'Server error during analysis: {str(e)}'
        }), 500
