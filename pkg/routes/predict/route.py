from flask import Blueprint
from routes.predict.controller import predict_process

predict_bp = Blueprint('predict', __name__)

@predict_bp.route('/predict', methods=['POST'])
def predict():
    """Prediction endpoint - tail exponent, mean intensity and stability class."""
    return predict_process()
