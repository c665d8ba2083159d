from flask import Flask, jsonify
from dotenv import load_dotenv
from routes.predict.route import predict_bp
from routes.simulate.route import simulate_bp
from routes.analyze.route import analyze_bp
from services import __version__

load_dotenv()

app = Flask(__name__)

# Production configuration
app.config['MAX_CONTENT_LENGTH'] = 256 * 1024 * 1024  # 256MB max series upload

# Enable CORS for all routes
from flask_cors import CORS
CORS(app)

@app.route('/')
def home():
    return jsonify({
        'message': 'ZHawkes Toolkit API',
        'version': __version__,
        'endpoints': {
            'predict': '/predict (POST) - Tail exponent, mean intensity and stability class for parameters',
            'simulate': '/simulate (POST) - Run the thinning simulator or the SDE and get a run summary',
            'analyze': '/analyze (POST) - Upload a series file for tail fits and stationarity diagnostics'
        },
        'status': 'active'
    })

@app.errorhandler(413)
def too_large(_):
    return jsonify({
        'success': False,
        'error': 'Uploaded series file is too large.'
    }), 413

# Register blueprints
app.register_blueprint(predict_bp, url_prefix='')
app.register_blueprint(simulate_bp, url_prefix='')
app.register_blueprint(analyze_bp, url_prefix='')


if __name__ == '__main__':
    import logging
    import os

    # Production configuration
    PORT = int(os.environ.get('PORT', 5000))
    HOST = os.environ.get('HOST', '0.0.0.0')
    DEBUG = os.environ.get('FLASK_DEBUG', 'False').lower() == 'true'
    ENV = os.environ.get('FLASK_ENV', 'development')

    logging.basicConfig(level=os.environ.get('LOG_LEVEL', 'INFO').upper())

    if ENV == 'production':
        print(f"ZHawkes Toolkit API {__version__} starting in PRODUCTION mode...")
        print(f"Debug Mode: OFF")
        print(f"Host: {HOST}")
        print(f"Port: {PORT}")
        print("-" * 50)

        app.run(
            host=HOST,
            port=PORT,
            debug=False,
            threaded=True
        )
    else:
        print(f"ZHawkes Toolkit API {__version__} starting in DEVELOPMENT mode...")
        print(f"Local Access: http://localhost:{PORT}")
        print(f"Debug Mode: {'ON' if DEBUG else 'OFF'}")
        print("-" * 50)

        app.run(
            host=HOST,
            port=PORT,
            debug=DEBUG
        )
