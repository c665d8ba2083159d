from flask import Blueprint
from routes.simulate.controller import simulate_process

simulate_bp = Blueprint('simulate', __name__)

@simulate_bp.route('/simulate', methods=['POST'])
def simulate():
    """Simulation endpoint - runs the thinning simulator or the SDE and returns a summary."""
    return simulate_process()
