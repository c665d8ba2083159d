
from flask import Blueprint
from routes.analyze.controller import analyze_series

analyze_bp = Blueprint('analyze', __name__)

@analyze_bp.route('/analyze', methods=['POST'])
def analyze():
    """Analysis endpoint - accepts a series file upload and returns tail and stationarity diagnostics."""
    return analyze_series()

